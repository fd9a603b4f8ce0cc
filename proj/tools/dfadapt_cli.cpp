#include "dfadapt/cli.hpp"

int main(int argc, char** argv) { return dfadapt::cli_main(argc, argv); }
