#pragma once

#include "duqbench/emulator.hpp"

namespace duqbench {

// Bridge to out-of-process emulators speaking line-delimited JSON on
// stdin/stdout:
//
//   {"op":"fit","X":[[...]],"y":[...],"seed":N}
//     -> {"ok":true,"model_id":ID}
//   {"op":"predict","model_id":ID,"X":[[...]],"M":N,"seed":N}
//     -> {"ok":true,"draws":[[...]]}        (M rows, one per draw)
//   errors -> {"ok":false,"stage":"fit"|"pred","msg":"..."}
//
// The EmulatorSpec must carry a "command" hyperparameter (run through
// /bin/sh). An
// optional "timeout_seconds" hyperparameter bounds each request; overruns
// kill the process and surface as fit/pred failure signals with diagnostics.
const Emulator& external_emulator_instance();

}  // namespace duqbench
