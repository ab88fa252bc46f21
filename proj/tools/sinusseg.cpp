#include <string>
#include <vector>

#include "sinusseg/cli/cli.hpp"

int main(int argc, char** argv) { return sinusseg::cli::run(std::vector<std::string>(argv, argv + argc)); }
