#include "kseg/cli.hpp"

int main(int argc, char** argv) { return kseg::cli::dispatch(argc, argv); }
