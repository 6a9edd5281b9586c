#include <iostream>
int main() { std::cout << "absagen (under construction)\n"; }
