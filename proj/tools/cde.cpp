#include "cde/cli/commands.hpp"

int main(int argc, char** argv) { return cde::cli::main_entry(argc, argv); }
