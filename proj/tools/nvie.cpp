#include "nvie/app/cli.hpp"

int main(int argc, char** argv) { return nvie::app::run_cli(argc, argv); }
