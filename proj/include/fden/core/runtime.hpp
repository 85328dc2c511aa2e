// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace fden {

/// Keeps glibc malloc from returning freed activation buffers to the OS
/// between steps. Call once at process start; harmless elsewhere.
void configure_allocator();

}  // namespace fden
