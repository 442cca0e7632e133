/*
 Copyright 2026 The prefmpc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef PREFMPC_PREFMPC_HPP
#define PREFMPC_PREFMPC_HPP

#include "prefmpc/active.hpp"
#include "prefmpc/box_qp.hpp"
#include "prefmpc/dynamics.hpp"
#include "prefmpc/evaluation.hpp"
#include "prefmpc/harness.hpp"
#include "prefmpc/mpc.hpp"
#include "prefmpc/optim.hpp"
#include "prefmpc/oracle.hpp"
#include "prefmpc/surrogate.hpp"

#endif  // PREFMPC_PREFMPC_HPP
