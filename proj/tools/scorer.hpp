#pragma once

// Reference bridge scorer: mean-squared error against a target image, with
// the exact per-pixel cotangent 2*(I - target)/numel. Speaks the gradient
// bridge protocol on stdin/stdout. Returns a process exit code.
int run_mse_scorer(const char* target_raw_path);
