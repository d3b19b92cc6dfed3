#include "chamberlens/cli.hpp"

int main(int argc, char** argv) {
    return chamberlens::run_cli(argc, argv);
}
