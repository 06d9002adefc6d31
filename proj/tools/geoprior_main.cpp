#include "geoprior/cli.hpp"

int main(int argc, char** argv) { return geoprior::run_cli(argc, argv); }
