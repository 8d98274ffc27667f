#include "imfas/cli.hpp"

int main(int argc, char** argv) {
    return imfas::cli::run(argc, argv);
}
