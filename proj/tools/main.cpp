#include "ambest/network.hpp"

#include <cstdio>

int main() {
    std::puts("ambest: cli not wired up yet");
    return 0;
}
