#include "musagent/cli.hpp"

int main(int argc, char** argv) { return musagent::run_cli(argc, argv); }
