#pragma once

namespace catchplan {

const char* versionString();

}  // namespace catchplan
