#include <cstdio>

#include "catchplan/version.hpp"

int main(int argc, char** argv) {
    (void)argc;
    (void)argv;
    std::printf("catchplan %s\n", catchplan::versionString());
    return 0;
}
