#include "orthokey/cli.hpp"

int main(int argc, char** argv) { return orthokey::cli::run(argc, argv); }
