#include "evsynth/cli.hpp"

int main(int argc, char** argv) { return evsynth::cli::run(argc, argv); }
