// tests arrive with the module
