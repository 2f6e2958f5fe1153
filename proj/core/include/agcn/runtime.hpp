#pragma once

namespace agcn {

// Stops glibc from returning freed memory to the OS. Every forward pass
// reallocates the same buffers, and the page faults from handing them
// back and forth otherwise cost about a third of the run time.
// No-op on other allocators.
void keep_freed_memory();

}  // namespace agcn
