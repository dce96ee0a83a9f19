#pragma once
// Entry point of the tkl tool, callable in-process so tests can drive the
// full pipeline (parse -> run -> CSV) without spawning.

namespace tkl {

int cli_main(int argc, const char* const* argv);

}  // namespace tkl
