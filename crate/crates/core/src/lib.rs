pub mod client_eval;
pub mod dataset;
pub mod frame_selection;
pub mod llm_backend;
pub mod orchestrator;
pub mod planning;
pub mod protocol;
pub mod reflection;
pub mod rules;
pub mod text;
pub mod toolbox;
