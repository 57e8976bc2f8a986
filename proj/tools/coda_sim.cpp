#include <string>
#include <vector>

#include <codafl/cli.hpp>

int main(int argc, char** argv) {
  return codafl::cli::run(std::vector<std::string>(argv, argv + argc));
}
