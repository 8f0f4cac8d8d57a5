#include "georay/pipeline.hpp"

int main(int argc, char** argv) { return georay::run_cli(argc, argv); }
