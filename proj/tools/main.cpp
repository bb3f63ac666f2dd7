#include "sfflab/runconfig.hpp"

int main(int argc, char** argv) { return sfflab::run_cli(argc, argv); }
