#include <cstdio>
int main() { std::puts("hoqt: placeholder"); return 2; }
