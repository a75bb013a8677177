#include <atomint/cli.hpp>

int main(int argc, char** argv) { return atomint::cli::run(argc, argv); }
