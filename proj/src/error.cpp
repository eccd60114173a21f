#include "mcnet/error.hpp"

namespace mcnet {

const char* error_class_name(ErrorClass c) {
  switch (c) {
    case ErrorClass::config:
      return "config";
    case ErrorClass::shape:
      return "shape";
    case ErrorClass::io:
      return "io";
    case ErrorClass::data:
      return "data";
    case ErrorClass::numeric:
      return "numeric";
    case ErrorClass::usage:
      return "usage";
  }
  return "unknown";
}

}  // namespace mcnet
