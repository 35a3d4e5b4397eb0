#include "ofdm/harness.hpp"

int main(int argc, char** argv) { return ofdm::cli(argc, argv); }
