#include "rowless/training.hpp"

#include <fstream>

namespace rowless {

void save_train_log(const TrainReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  for (const EpochStats& e : report.epochs) {
    out << e.epoch << '\t' << e.mean_loss << '\t' << e.val_metric << '\n';
  }
}

}  // namespace rowless
