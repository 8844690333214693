#include "afsmote/cli.hpp"

int main(int argc, char** argv) { return afsmote::run_cli(argc, argv); }
