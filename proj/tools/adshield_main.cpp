#include "adshield/cli.hpp"

int main(int argc, char** argv) { return adshield::cli::execute(argc, argv); }
