#include <cstdio>
int main(){std::puts("fockflow");return 0;}
