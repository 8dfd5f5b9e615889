#include "mipstab/cli_io.hpp"

int main(int argc, char** argv) { return mipstab::cli_main(argc, argv); }
