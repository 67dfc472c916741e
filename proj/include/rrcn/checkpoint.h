#ifndef RRCN_CHECKPOINT_H_
#define RRCN_CHECKPOINT_H_

#include <filesystem>
#include <istream>
#include <ostream>

#include "rrcn/model.h"

namespace rrcn {

// Text checkpoint, stable across versions:
//
//   rrcn-checkpoint 1
//   config <n>            followed by n key=value lines
//   attributes <L>        followed by L lines "name vocab_size"
//   tensors <count>
//   tensor <name> <rank> <dims...>
//   <values as C99 hexfloats, whitespace separated>
//
// Hexfloats make the round trip bit-exact. Policy tensors are named
// policy<k>.w1 / .b1 / .w2 / .baseline.
void WriteCheckpoint(std::ostream& out, const RRCNModel& model);
RRCNModel ReadCheckpoint(std::istream& in);

void SaveCheckpoint(const RRCNModel& model, const std::filesystem::path& path);
RRCNModel LoadCheckpoint(const std::filesystem::path& path);

}  // namespace rrcn

#endif  // RRCN_CHECKPOINT_H_
