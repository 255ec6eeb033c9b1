#include "tk/cli.hpp"

int main(int argc, char** argv) { return tk::cli::run(argc, argv); }
