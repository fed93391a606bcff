#include "cptlab_cli/app.hpp"

int main(int argc, char** argv) { return cptlab::cli::main_entry(argc, argv); }
