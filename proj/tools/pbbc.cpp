#include "pbbc_cli.hpp"

int main(int argc, char** argv) { return pbbc::cli::run(argc, argv); }
