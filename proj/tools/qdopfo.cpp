#include "qdopfo/experiment.hpp"

int main(int argc, char** argv) { return qdopfo::cli_main(argc, argv); }
