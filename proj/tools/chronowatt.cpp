#include <iostream>

#include "chronowatt/cli.hpp"

int main(int argc, char** argv)
{
    return chronowatt::cli_main(argc, argv, std::cout, std::cerr);
}
