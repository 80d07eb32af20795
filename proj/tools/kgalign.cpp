#include "kgalign/app.hpp"

int main(int argc, char** argv) { return kgalign::app::run(argc, argv); }
