#include "wikisvd/cli.hpp"

int main(int argc, char** argv) { return wikisvd::run_command(argc, argv); }
