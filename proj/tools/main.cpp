#include "thevest/cli_app.hpp"

int main(int argc, char** argv) { return thevest::cli::run(argc, argv); }
