#pragma once

#include <stdexcept>
#include <string>

namespace tcl2spin {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class not_hermitian : public error {
 public:
  using error::error;
};

class no_convergence : public error {
 public:
  using error::error;
};

class dimension_mismatch : public error {
 public:
  using error::error;
};

class non_positive_frequency : public error {
 public:
  using error::error;
};

class quadrature_failure : public error {
 public:
  using error::error;
};

class step_too_large : public error {
 public:
  using error::error;
};

/// Raised while reading a run configuration; `key()` names the offending entry.
class config_error : public error {
 public:
  config_error(std::string key, const std::string& what)
      : error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class io_error : public error {
 public:
  io_error(std::string path, const std::string& what)
      : error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace tcl2spin
