#include "rooney/cli.hpp"

int main(int argc, char** argv) { return rooney::cli::run(argc, argv); }
