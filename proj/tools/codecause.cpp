#include "codecause/cli.hpp"

int main(int argc, char** argv) { return codecause::cli::main(argc, argv); }
