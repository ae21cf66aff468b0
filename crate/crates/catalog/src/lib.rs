//! Service side of the catalog: harvesting connectors, the link checker,
//! the file-backed event store, curation workflow, HTTP API, MCP server and
//! the `oc` command line.

pub mod accounts;
pub mod clock;
pub mod store;
pub mod linkcheck;
pub mod stub;
pub mod connectors;
pub mod config;
pub mod workflow;
pub mod api;
pub mod http;
pub mod mcp;
pub mod cli;
