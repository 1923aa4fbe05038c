#include "recon/errors.hpp"

namespace recon {

void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace recon
