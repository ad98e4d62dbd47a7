#include <iostream>
#include <string>
#include <vector>

#include <anb/cli.hpp>

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return anb::dispatch(args, std::cout, std::cerr);
}
