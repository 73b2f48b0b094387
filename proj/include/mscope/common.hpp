#ifndef MSCOPE_COMMON_HPP
#define MSCOPE_COMMON_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mscope {

using Index = Eigen::Index;

/// Dense row-major matrix; the storage type for image planes and point clouds.
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using RowMatrixXd = RowMatrix<double>;

// Error hierarchy. Each family maps onto one CLI exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
};

/// Bad arguments, shape mismatches, invalid configuration (exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class DimensionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Work would exceed a configured memory/size budget (exit code 3).
class CapacityError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

/// Unreadable/unwritable files (exit code 4).
class IoError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

/// File exists but its contents are not in an accepted format.
class FormatError : public IoError {
public:
    using IoError::IoError;
};

/// Worker count for parallel loops: MSCOPE_THREADS if set and positive,
/// otherwise the hardware concurrency (at least 1).
unsigned default_thread_count();

/// 64-bit FNV-1a digest of a file, as 16 lowercase hex digits.
std::string file_digest(const std::string& path);

}  // namespace mscope

#endif  // MSCOPE_COMMON_HPP
