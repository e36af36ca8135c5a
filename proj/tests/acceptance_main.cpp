#include <iostream>

#include "acceptance.hpp"

int main() { return splitdom::acceptance::run_all(std::cout) ? 0 : 1; }
