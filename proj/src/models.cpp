#include "spsurv/models.hpp"

#include <stdexcept>

namespace spsurv {

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::AFT: return "AFT";
    case ModelKind::PH: return "PH";
    case ModelKind::PO: return "PO";
  }
  return "?";
}

ModelKind parse_model(const std::string& name) {
  if (name == "AFT" || name == "aft") return ModelKind::AFT;
  if (name == "PH" || name == "ph") return ModelKind::PH;
  if (name == "PO" || name == "po") return ModelKind::PO;
  throw std::invalid_argument("unknown model '" + name + "' (expected AFT, PH or PO)");
}

}  // namespace spsurv
