#include "cli.hpp"

int main(int argc, char** argv) {
    return gqkd::cli::run_main(argc, argv);
}
