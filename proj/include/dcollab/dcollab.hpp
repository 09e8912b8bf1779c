/*
 * Copyright 2026 The dcollab Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DCOLLAB_DCOLLAB_HPP_
#define DCOLLAB_DCOLLAB_HPP_

#include "dcollab/collaboration.hpp"
#include "dcollab/config.hpp"
#include "dcollab/container.hpp"
#include "dcollab/dataset.hpp"
#include "dcollab/error.hpp"
#include "dcollab/experiment.hpp"
#include "dcollab/learner.hpp"
#include "dcollab/linalg.hpp"
#include "dcollab/mapper.hpp"
#include "dcollab/network.hpp"
#include "dcollab/pipeline.hpp"
#include "dcollab/session.hpp"
#include "dcollab/transport.hpp"
#include "dcollab/wire.hpp"

#endif  // DCOLLAB_DCOLLAB_HPP_
