#include "keyscore/cli.hpp"

int main(int argc, char** argv) { return keyscore::cli::run(argc, argv); }
