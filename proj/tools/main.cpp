#include "cli.hpp"

int main(int argc, char** argv) { return wassbound::cli::run(argc, argv); }
