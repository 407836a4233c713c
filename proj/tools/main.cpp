#include "mukf/harness.hpp"

int main(int argc, char** argv) { return mukf::cli_main(argc, argv); }
