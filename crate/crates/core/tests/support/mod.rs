pub mod grid_oracle;
