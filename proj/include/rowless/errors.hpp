#pragma once

#include <stdexcept>
#include <string>

namespace rowless {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct dimension_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct empty_dataset_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct degenerate_row_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct divergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct encoding_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct unseen_row_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct undefined_ap_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct checkpoint_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct explain_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rowless
