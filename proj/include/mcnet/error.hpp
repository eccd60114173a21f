#pragma once

#include <stdexcept>
#include <string>

namespace mcnet {

// Error classes map one-to-one onto the CLI's machine-parsable failure line.
enum class ErrorClass { config, shape, io, data, numeric, usage };

const char* error_class_name(ErrorClass c);

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& msg)
      : std::runtime_error(msg), cls_(cls) {}
  ErrorClass cls() const { return cls_; }

 private:
  ErrorClass cls_;
};

[[noreturn]] inline void fail(ErrorClass cls, const std::string& msg) {
  throw Error(cls, msg);
}

}  // namespace mcnet
