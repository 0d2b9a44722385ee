// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Planning and feasibility analysis for wavelength-routed star QKD networks.
//!
//! An N-port passive router is built from N wavelength multiplexers wired so
//! that every pair of users shares exactly one wavelength.
//!
//! - [`wiring`] builds and verifies the wavelength assignment.
//! - [`photonics`] turns multiplexer dB figures into photon probabilities.
//! - [`transport`] checks those probabilities by Monte Carlo.
//! - [`network`] adds arterial fibers and produces per-pair link budgets.
//! - [`cli`] is the `qrouter` command-line tool.

pub mod cli;
pub mod network;
pub mod photonics;
pub mod transport;
pub mod wiring;
