#include "catchplan/version.hpp"

namespace catchplan {

const char* versionString() { return "1.0.0"; }

}  // namespace catchplan
