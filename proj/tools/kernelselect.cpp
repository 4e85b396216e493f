#include "kernelselect/cli/app.hpp"

int main(int argc, char** argv) { return ksel::cli::run(argc, argv); }
